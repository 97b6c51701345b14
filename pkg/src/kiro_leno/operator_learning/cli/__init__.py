"""Command-line frontend: eig, gen, project, train, eval, predict, transfer and repro."""
