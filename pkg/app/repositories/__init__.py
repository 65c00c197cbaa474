"""
Repositories Package
"""
