"""
Test suite for the self-triggered sampling toolkit.
"""
