"""Sparse weighted temporal fusion (SWTF) toolkit for video activity recognition.

Subpackages:
    dataio    -- snippet file formats, normalization, resizing, augmentation,
                 synthetic motion dataset generator
    fusion    -- segment planning, sparse sampling, dense optical flow, and
                 the weighted temporal fusion map
    roialign  -- differentiable ROI-aligned feature cropping
    net       -- numpy CNN ops with exact backward passes and the classifier head
    optim     -- Adam with L2 weight decay and the step LR schedule
    pipeline  -- training/eval orchestration, checkpoints, CLI, gradcheck, bench
"""

__version__ = "0.1.0"
