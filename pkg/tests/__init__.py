# Tests for btnn-spotter
