import math
a: int = 5
b: int = 2

# |-

# add 17 to a to the b'th power
17+math.pow(a, b)
