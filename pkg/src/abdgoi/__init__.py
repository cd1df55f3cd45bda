"""Reference interpreter for the abductive lambda calculus."""
