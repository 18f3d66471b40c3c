"""Arbitrage, numéraire and measure-change analysis for exponential Lévy markets under convex constraints."""
