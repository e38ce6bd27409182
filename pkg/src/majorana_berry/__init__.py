"""Berry phases of spin-j states in the Majorana star representation."""
