"""Software-in-the-loop simulator for a small twin-thruster camera boat.

Subpackages and modules:

- ``dynamics``   planar differential-drive vessel model
- ``steering``   cascaded heading controller (angle P -> rate PID)
- ``guidance``   waypoint / target-follow setpoint generation and modes
- ``telemetry``  wire protocol and simulated radio link
- ``depth``      depth-map losses, affine alignment, colorization
- ``harness``    scenario runner, metrics, telemetry server, CLI
"""

from ._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
