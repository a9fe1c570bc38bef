#: pre: e>0
#: post: b**e
def power(b: float, e: int) -> float:
    if e==1:
        return b
    else:
        return b*power(b, e-1)

# |-

power(2, 1)
