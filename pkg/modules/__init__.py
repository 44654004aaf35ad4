# This file makes the modules directory a Python package 