"""
Output helpers: PNG charts and filterbank inspection
"""
