"""Link-level Monte-Carlo simulator for user-centric cell-free OFDM networks.

The package is organised around the simulation pipeline:

- :mod:`uccfsim.topology`   AP/UE geometry, association, AP-UE factor graph
- :mod:`uccfsim.channel`    pathloss, shadowing, multipath taps, subcarrier gains
- :mod:`uccfsim.training`   pilot blocks and MMSE channel estimation
- :mod:`uccfsim.uplink`     global and local MMSE detectors, SINR, sum-rate
- :mod:`uccfsim.apmp`       message-passing detection on the AP-UE factor graph
- :mod:`uccfsim.downlink`   centralized and distributed precoding, secrecy
- :mod:`uccfsim.alloc`      subcarrier and power allocation heuristics
- :mod:`uccfsim.engine`     scenario config, trial orchestration, exports
"""

__version__ = "0.1.0"
