"""
Frequency-domain simulator and fitting toolkit for a hybrid readout ring cavity speedmeter.
"""

__version__ = "1.0.0"
