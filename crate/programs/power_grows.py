#: pre: e>0
#: post: b**e
#: progress: e
#: pmin: 1
def power(b: float, e: int) -> float:
    if e==1:
        return b
    else:
        return b*power(b, e+1)

# |-

power(2, 1)
