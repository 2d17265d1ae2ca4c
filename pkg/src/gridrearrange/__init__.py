"""Grid Rearrangement solvers for multi-agent path finding on 2D/3D grids."""
