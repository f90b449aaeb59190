"""dynhi: dynamic health-indicator construction and bearing degradation prognosis.

The package is organized as a numpy library:

  nn         differentiable-tensor substrate (layers, autodiff, Adam, checkpoints)
  data       run-to-failure record loaders, spectra, synthetic generation
  skipae     skip-connection autoencoder for degradation feature learning
  higen      dynamic health-indicator module with the inner prediction block
  metrics    indicator quality (Mon/Tred/Rob/HS) and forecast quality (RMSE/Pred)
  prognosis  trend forecasting, failure-threshold crossing, remaining useful life
  experiment file-based pipeline stages shared by the CLI and the test suites
"""

__version__ = "0.1.0"
