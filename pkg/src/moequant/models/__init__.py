"""Domain types and the pydantic config schema."""
