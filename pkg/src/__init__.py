# Handwritten digit recognition - source package
