"""Single home for the tool identity written into provenance sidecars."""

TOOL_NAME = "treelab"
TOOL_VERSION = "0.1.0"
