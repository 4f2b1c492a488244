"""Tests for radar-flow-labels."""
