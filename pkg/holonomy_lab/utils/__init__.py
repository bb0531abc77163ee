# Utility modules for holonomy-lab
