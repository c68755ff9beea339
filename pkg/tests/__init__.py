# Test package for superhol
