"""
Domain package holding the dataclass containers.
"""
