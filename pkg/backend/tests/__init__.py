# Test package for the mining backend
