"""Scripts for development tasks."""
