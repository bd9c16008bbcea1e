"""Federated DDPG bandwidth allocation for multi-MVNO RAN slicing."""
__version__ = "0.1.0"
