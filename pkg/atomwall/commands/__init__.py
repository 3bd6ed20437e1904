"""Command line surface"""
