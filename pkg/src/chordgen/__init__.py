"""Chord generation from symbolic melodies."""
