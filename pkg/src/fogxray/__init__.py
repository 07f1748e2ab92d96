"""Chest X-ray CNN classifier with a fog/cloud inference placement simulator.

Subpackages and modules:

- tensor: dense float32 arrays and elementwise ops
- nn: layers, model assembly, loss, optimizer, training, checkpoints
- metrics: confusion-matrix derived classification metrics
- data: dataset manifests, stratified splits, image decoding
- fogsim: discrete-event latency simulation for placement policies
- cli: command-line entry points
"""

__version__ = "0.1.0"
