"""Run configuration, model specification and report schemas."""
