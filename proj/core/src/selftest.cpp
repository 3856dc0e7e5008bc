namespace krein {}
