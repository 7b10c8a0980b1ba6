"""Entanglement distillation by particle statistics."""
