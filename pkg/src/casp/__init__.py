"""Constraint answer set solving with black-, grey- and clear-box integration."""
