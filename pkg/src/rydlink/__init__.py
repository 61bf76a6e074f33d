"""Semi-deterministic atom-photon entanglement toolkit.

Models a blockaded atomic ensemble driven into momentum-distinguishable
collective modes, the resulting atom-photon (and photon-photon)
polarization entanglement, its dephasing and noise channels, and the use
of the source in an elementary repeater link.
"""

__version__ = "0.1.0"
