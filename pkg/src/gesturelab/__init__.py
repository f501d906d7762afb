"""gesturelab: a desk-scale laboratory for context-aware gesture-to-intent inference.

Synthetic users express intents over a discrete table-top world through
hand gestures; a variational classifier maps gesture evidence plus scene
context back to intents, and a planner expands intents into checked
action sequences.
"""

__version__ = "0.1.0"
