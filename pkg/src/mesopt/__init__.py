"""mesopt: two-scale annealed value-iteration shape optimization.

The outer (mesoscopic) loop walks a coarse parameter grid; each step fits a
local quadratic surrogate from a handful of ground-truth solves, estimates a
value function on the surrounding box with a self-consistent Metropolis
kernel, jumps to its minimizer, and freezes parameter dimensions whose axis
offers no relative descent.  Ground truth is either a 2-D Stokes channel
solve around an airfoil or one of the analytic test objectives.
"""

__version__ = "0.1.0"
