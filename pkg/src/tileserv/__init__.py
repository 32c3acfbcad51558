"""UTM tile-pyramid imagery service: grid geometry, projection, tile store,
mosaic composition, gazetteer, HTTP service, and client SDK."""

__version__ = "0.1.0"
