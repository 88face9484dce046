"""
Evacuation Delay Evaluator

Channel evacuation delay of TV black-space spectrum managers, from
closed-form queueing estimates to discrete-event simulation.
"""

__version__ = "0.1.0"
