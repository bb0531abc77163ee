# Command modules for the holonomy-lab CLI
