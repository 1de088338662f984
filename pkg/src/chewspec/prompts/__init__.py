"""Prompt templates for the agent roles; each file opens with a header comment."""
