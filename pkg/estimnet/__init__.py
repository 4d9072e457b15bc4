"""
EstimNet - ERGM estimation for large directed networks by Equilibrium Expectation
"""
__version__ = "1.0.0"
