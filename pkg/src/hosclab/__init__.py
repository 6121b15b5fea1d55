"""Operational game semantics laboratory for a language with higher-order state and call/cc."""
