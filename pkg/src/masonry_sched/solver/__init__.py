"""LP engine, branch-and-bound, greedy incumbent and MPS/solution interchange."""
