"""Mobility telemetry platform.

Library plus services: segment model and serialization, activity
classification heuristics, RSA field encryption, relational persistence,
the HTTP ingest/query surface, Barcelona traffic feed parsing, an
in-process push broker, and the mobsim synthetic client.
"""

__version__ = "0.1.0"
