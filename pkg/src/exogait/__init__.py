"""Forward-dynamics gait simulation of a reflex-controlled human walking
with a hip exoskeleton, plus the two-step CMA-ES reflex-parameter tuner."""

__version__ = "0.1.0"
