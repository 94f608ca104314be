# ABOUTME: Package marker for the Ramanujan-mask matrix completion toolkit
# ABOUTME: Enables importing modules from the src directory
