"""Configuration and environment helpers."""
