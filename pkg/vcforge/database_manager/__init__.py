"""
Run registry package (sqlite index of training runs and evaluations).
"""
