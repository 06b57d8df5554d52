"""Dataset loading, encoding, splitting and masked views."""
