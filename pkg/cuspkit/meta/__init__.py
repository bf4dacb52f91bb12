#placeholder for namespace package
