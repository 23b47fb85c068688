"""Tests for fairrank."""
