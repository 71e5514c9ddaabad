"""Protograph LDPC design toolkit."""
