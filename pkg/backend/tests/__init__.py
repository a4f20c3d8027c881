#!/usr/bin/env python3
"""
Tests package initialization
"""
