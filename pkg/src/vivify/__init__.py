"""vivify: give everyday objects a voice.

Ingests camera frames from a scope device, registers objects through an
acquaintance pipeline, attaches a generated persona to each object, and
runs a push-to-talk bonding loop over a user-centric multi-object network.
All model capabilities are pluggable; deterministic mocks plus a device
simulator make the full system verifiable at desk scale.
"""

__version__ = "0.1.0"
