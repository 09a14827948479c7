"""Tests for pension_dc."""
