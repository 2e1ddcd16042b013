"""Numerical certification of the coordination principle."""
