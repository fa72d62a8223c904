"""HTTP service wrapping the library; the CLI talks to this app in process."""
