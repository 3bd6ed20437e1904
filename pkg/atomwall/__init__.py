"""Lifshitz atom-wall van der Waals package"""
