"""Reference data: benchmark problems, random initial conditions and explicit solvers."""
