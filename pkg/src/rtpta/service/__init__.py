"""HTTP service facade over the analysis core."""
