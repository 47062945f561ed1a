"""Road User Communication Service (RUCS).

A cloud service through which road users of any automation level exchange
properties (computed state queries) and actions (forwarded commands),
plus a simulation harness for latency analysis.
"""

__version__ = "0.1.0"
