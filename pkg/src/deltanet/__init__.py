"""Delta-network GRU inference engine, cost simulator and toy trainer."""
