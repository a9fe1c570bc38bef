"""
  Return a sentence w/ recommended punctuation,
    e.g. 'What is that?' for 'What is that'
    or   'It is a cow.'  for 'It is a cow'.
"""
def recPunct(sentence: str) -> str:
    if sentence[0:4]=='What':
        return sentence+'?'
    else:
        return sentence+'.'

# |-

recPunct('What is it')
